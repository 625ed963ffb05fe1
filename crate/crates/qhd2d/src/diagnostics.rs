//! Conserved and monitored scalars plus the runtime identity checks: both
//! energy forms, entropy, momentum, the pressure relation, the three
//! algebraic forms of the quantum-pressure term, the logarithmic Sobolev
//! inequality and mixed space-time norms.

use crate::error::{QhdError, Result};
use crate::fields::{RealField, WaveField};
use crate::poisson::{self, PoissonMode};
use crate::polar::{self, default_vacuum_eps};
use crate::propagator::StepParams;
use std::f64::consts::PI;

/// One time sample of every monitored scalar.
#[derive(Clone, Debug)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    /// Wave-form energy: `hbar^2/2 |grad psi|^2 + 2/(p+1) |psi|^{p+1}
    /// + 1/2 V |psi|^2`, with the internal and field terms included only
    /// when the corresponding dynamics flags are on.
    pub energy_wave: f64,
    /// Hydrodynamic form assembled from the moments; the field term uses
    /// `1/2 integral V rho` in every Poisson mode.
    pub energy_hydro: f64,
    pub e_kinetic_amp: f64,
    pub e_kinetic_cur: f64,
    pub e_internal: f64,
    pub e_field: f64,
    pub px: f64,
    pub py: f64,
    pub entropy: f64,
    pub null_residual: f64,
    pub irrot_residual: f64,
    pub lambda_l2: f64,
}

impl DiagnosticsRecord {
    pub const CSV_HEADER: &'static str = "t,mass,energy_wave,energy_hydro,e_kinetic_amp,\
e_kinetic_cur,e_internal,e_field,px,py,entropy,null_residual,irrot_residual,lambda_l2";

    pub fn csv_row(&self) -> String {
        format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            self.t,
            self.mass,
            self.energy_wave,
            self.energy_hydro,
            self.e_kinetic_amp,
            self.e_kinetic_cur,
            self.e_internal,
            self.e_field,
            self.px,
            self.py,
            self.entropy,
            self.null_residual,
            self.irrot_residual,
            self.lambda_l2
        )
    }
}

pub(crate) fn internal_energy_density(rho: f64, p: f64) -> f64 {
    // f(rho) = 2/(p+1) rho^{(p+1)/2}
    let pw = if p == 3.0 {
        rho * rho
    } else if p == 1.0 {
        rho
    } else {
        rho.powf((p + 1.0) / 2.0)
    };
    2.0 / (p + 1.0) * pw
}

/// Compute every monitored quantity for one state.
pub fn record(psi: &WaveField, params: &StepParams, t: f64) -> Result<DiagnosticsRecord> {
    if !psi.is_finite() {
        return Err(QhdError::Validation("state is not finite".into()));
    }
    let grid = &psi.grid;
    let da = grid.cell_area();
    let eps = default_vacuum_eps(psi);
    let m = polar::moments(psi, eps);
    let (gx, gy) = psi.gradient();
    let hbar = psi.hbar;

    let mut mass = 0.0;
    let mut internal = 0.0;
    let mut px = 0.0;
    let mut py = 0.0;
    let mut entropy = 0.0;
    for i in 0..grid.len() {
        let rho = m.rho.values[i];
        mass += rho;
        internal += internal_energy_density(rho, params.p);
        let v = psi.values[i];
        px += (v.conj() * gx.values[i]).im;
        py += (v.conj() * gy.values[i]).im;
        if rho > 0.0 {
            entropy += rho * rho.ln();
        }
    }
    mass *= da;
    // kinetic energy as the full |k|^2 quadratic form (Parseval), the exact
    // invariant of the kinetic substep; the Nyquist-zeroed gradient would
    // miss the Nyquist-line content
    let grad_sq = {
        let mut spec = psi.values.clone();
        grid.forward(&mut spec);
        let mut acc = 0.0;
        for iy in 0..grid.ny {
            for ix in 0..grid.nx {
                let k2 = grid.kx[ix] * grid.kx[ix] + grid.ky[iy] * grid.ky[iy];
                acc += k2 * spec[iy * grid.nx + ix].norm_sqr();
            }
        }
        acc / grid.len() as f64
    };
    let e_kinetic_wave = 0.5 * hbar * hbar * grad_sq * da;
    let e_internal = internal * da;
    px *= hbar * da;
    py *= hbar * da;
    entropy *= da;

    let e_field = if params.potential_on {
        let sol = poisson::solve(&m.rho, params.doping.as_ref(), params.poisson_mode)?;
        poisson::potential_energy(&m.rho, &sol.v)?.half_v_rho
    } else {
        0.0
    };

    let mut amp_sq = 0.0;
    let mut cur_sq = 0.0;
    for i in 0..grid.len() {
        amp_sq += m.grad_sqrt_rho.x[i].powi(2) + m.grad_sqrt_rho.y[i].powi(2);
        cur_sq += m.lambda.x[i].powi(2) + m.lambda.y[i].powi(2);
    }
    let e_kinetic_amp = 0.5 * hbar * hbar * amp_sq * da;
    let e_kinetic_cur = 0.5 * cur_sq * da;
    let lambda_l2 = (cur_sq * da).sqrt();

    let active_internal = if params.nonlinearity_on { e_internal } else { 0.0 };
    let energy_wave = e_kinetic_wave + active_internal + e_field;
    let energy_hydro = e_kinetic_amp + e_kinetic_cur + active_internal + e_field;

    Ok(DiagnosticsRecord {
        t,
        mass,
        energy_wave,
        energy_hydro,
        e_kinetic_amp,
        e_kinetic_cur,
        e_internal,
        e_field,
        px,
        py,
        entropy,
        null_residual: polar::null_form_residual(psi, eps),
        irrot_residual: polar::irrotationality_residual(&m),
        lambda_l2,
    })
}

/// Sup-norm residual of `P(rho) = rho f'(rho) - f(rho)` with
/// `P(rho) = (p-1)/(p+1) rho^{(p+1)/2}`.
pub fn pressure_identity_residual(rho: &RealField, p: f64) -> f64 {
    let mut worst = 0.0f64;
    for &r in &rho.values {
        if r < 0.0 {
            continue;
        }
        let pressure = (p - 1.0) / (p + 1.0) * r.powf((p + 1.0) / 2.0);
        // f(r) = 2/(p+1) r^{(p+1)/2}, f'(r) = r^{(p-1)/2}
        let f = 2.0 / (p + 1.0) * r.powf((p + 1.0) / 2.0);
        let fp = if r == 0.0 && p < 1.0 {
            0.0
        } else {
            r.powf((p - 1.0) / 2.0)
        };
        let rhs = r * fp - f;
        worst = worst.max((pressure - rhs).abs());
    }
    worst
}

/// Residuals between the three spectral assemblies of the quantum-pressure
/// term: returns (first vs third, second vs third) as relative sup-norms
/// over the super-threshold set.
pub fn bohm_residuals(psi: &WaveField) -> Result<(f64, f64)> {
    let grid = &psi.grid;
    let eps = default_vacuum_eps(psi);
    let rho = psi.density();
    let vacuum: Vec<bool> = psi.values.iter().map(|v| v.norm() <= eps).collect();
    let vacuum_fraction =
        vacuum.iter().filter(|&&v| v).count() as f64 / grid.len() as f64;
    if vacuum_fraction > 0.5 {
        return Err(QhdError::Refusal(format!(
            "bohm identity is meaningless with {:.0}% of the domain in vacuum",
            100.0 * vacuum_fraction
        )));
    }
    let hbar = psi.hbar;
    let h2 = hbar * hbar;
    let floor = eps * eps;
    let clamped = RealField {
        grid: grid.clone(),
        values: rho.values.iter().map(|&r| r.max(floor)).collect(),
    };
    let sqrt_rho = RealField {
        grid: grid.clone(),
        values: clamped.values.iter().map(|r| r.sqrt()).collect(),
    };
    let log_rho = RealField {
        grid: grid.clone(),
        values: clamped.values.iter().map(|r| r.ln()).collect(),
    };

    // form A: (h^2/2) rho grad(lap sqrt(rho) / sqrt(rho))
    let lap_sqrt = sqrt_rho.laplacian();
    let quotient = RealField {
        grid: grid.clone(),
        values: lap_sqrt
            .values
            .iter()
            .zip(&sqrt_rho.values)
            .map(|(l, s)| l / s)
            .collect(),
    };
    let gq = quotient.gradient();
    let ax: Vec<f64> = gq.x.iter().zip(&rho.values).map(|(g, r)| 0.5 * h2 * r * g).collect();
    let ay: Vec<f64> = gq.y.iter().zip(&rho.values).map(|(g, r)| 0.5 * h2 * r * g).collect();

    // form B: (h^2/4) div(rho Hess(log rho))
    let gl = log_rho.gradient();
    let glx = RealField { grid: grid.clone(), values: gl.x.clone() };
    let gly = RealField { grid: grid.clone(), values: gl.y.clone() };
    let hxx = glx.gradient();
    let hyx = gly.gradient();
    let txx: Vec<f64> = hxx.x.iter().zip(&rho.values).map(|(h, r)| r * h).collect();
    let txy: Vec<f64> = hxx.y.iter().zip(&rho.values).map(|(h, r)| r * h).collect();
    let tyx: Vec<f64> = hyx.x.iter().zip(&rho.values).map(|(h, r)| r * h).collect();
    let tyy: Vec<f64> = hyx.y.iter().zip(&rho.values).map(|(h, r)| r * h).collect();
    let bx = tensor_divergence(grid, &txx, &tyx);
    let by = tensor_divergence(grid, &txy, &tyy);
    let bx: Vec<f64> = bx.iter().map(|v| 0.25 * h2 * v).collect();
    let by: Vec<f64> = by.iter().map(|v| 0.25 * h2 * v).collect();

    // form C: (h^2/4) grad(lap rho) - h^2 div(grad sqrt(rho) x grad sqrt(rho))
    let lap_rho = rho.laplacian();
    let glr = lap_rho.gradient();
    let gs = sqrt_rho.gradient();
    let sxx: Vec<f64> = gs.x.iter().map(|v| v * v).collect();
    let sxy: Vec<f64> = gs.x.iter().zip(&gs.y).map(|(a, b)| a * b).collect();
    let syy: Vec<f64> = gs.y.iter().map(|v| v * v).collect();
    let dx = tensor_divergence(grid, &sxx, &sxy);
    let dy = tensor_divergence(grid, &sxy, &syy);
    let cx: Vec<f64> = glr
        .x
        .iter()
        .zip(&dx)
        .map(|(g, d)| 0.25 * h2 * g - h2 * d)
        .collect();
    let cy: Vec<f64> = glr
        .y
        .iter()
        .zip(&dy)
        .map(|(g, d)| 0.25 * h2 * g - h2 * d)
        .collect();

    let mut scale = 0.0f64;
    let mut worst_ac = 0.0f64;
    let mut worst_bc = 0.0f64;
    for i in 0..grid.len() {
        if vacuum[i] {
            continue;
        }
        scale = scale.max(cx[i].abs()).max(cy[i].abs());
        worst_ac = worst_ac.max((ax[i] - cx[i]).abs()).max((ay[i] - cy[i]).abs());
        worst_bc = worst_bc.max((bx[i] - cx[i]).abs()).max((by[i] - cy[i]).abs());
    }
    let denom = scale + f64::EPSILON;
    Ok((worst_ac / denom, worst_bc / denom))
}

fn tensor_divergence(
    grid: &std::sync::Arc<crate::fields::Grid>,
    row_x: &[f64],
    row_y: &[f64],
) -> Vec<f64> {
    // sum_j d_j T_{j k} for one column k given as (T_{xk}, T_{yk})
    let fx = RealField {
        grid: grid.clone(),
        values: row_x.to_vec(),
    };
    let fy = RealField {
        grid: grid.clone(),
        values: row_y.to_vec(),
    };
    let gx = fx.gradient();
    let gy = fy.gradient();
    gx.x.iter().zip(&gy.y).map(|(a, b)| a + b).collect()
}

#[derive(Clone, Copy, Debug)]
pub struct LogSobolevCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

pub const LOG_SOBOLEV_REL_TOL: f64 = 1e-8;

/// Check `(M/2) integral f log f + double integral f log|x-y| f >= rhs(M)`
/// with `rhs(M) = -(M^2/2)(1 + log pi - log M)`, the sharp constant of the
/// logarithmic Hardy-Littlewood-Sobolev inequality. The interaction term
/// reuses the free-space Poisson kernel (opposite sign convention): the
/// direct double sum on grids it accepts, the padded convolution beyond.
pub fn log_sobolev_check(f: &RealField) -> Result<LogSobolevCheck> {
    if f.values.iter().any(|&v| v < -1e-14) {
        return Err(QhdError::Validation(
            "log-Sobolev check needs a non-negative density".into(),
        ));
    }
    let clamped = RealField {
        grid: f.grid.clone(),
        values: f.values.iter().map(|&v| v.max(0.0)).collect(),
    };
    let da = f.grid.cell_area();
    let mass = clamped.integrate();
    if mass <= 0.0 {
        return Err(QhdError::Validation(
            "log-Sobolev check needs positive total mass".into(),
        ));
    }
    let entropy: f64 = clamped
        .values
        .iter()
        .map(|&v| if v > 0.0 { v * v.ln() } else { 0.0 })
        .sum::<f64>()
        * da;
    let mode = if f.grid.len() <= poisson::ORACLE_MAX_POINTS {
        PoissonMode::QuadratureOracle
    } else {
        PoissonMode::FreeSpacePadded
    };
    let v = poisson::solve(&clamped, None, mode)?.v;
    // V = -(1/2pi) log * f, so the double integral is -2pi <V, f>
    let interaction = -2.0
        * PI
        * v.values
            .iter()
            .zip(&clamped.values)
            .map(|(a, b)| a * b)
            .sum::<f64>()
        * da;
    let lhs = 0.5 * mass * entropy + interaction;
    let rhs = -(mass * mass / 2.0) * (1.0 + PI.ln() - mass.ln());
    Ok(LogSobolevCheck {
        lhs,
        rhs,
        holds: lhs >= rhs - LOG_SOBOLEV_REL_TOL * rhs.abs(),
    })
}

/// Mixed space-time norm `|| grad psi ||_{L^q_t L^r_x}` over uniformly
/// spaced snapshots, by trapezoid quadrature in time. The pair must be
/// admissible: `1/q + 1/r = 1/2`, `2 <= r < infinity`; `q = infinity` is the
/// `(infinity, 2)` endpoint, evaluated as a sup over snapshots.
pub fn mixed_norm(snapshots: &[WaveField], dt_snap: f64, q: f64, r: f64) -> Result<f64> {
    if snapshots.is_empty() {
        return Err(QhdError::Validation("no snapshots supplied".into()));
    }
    if !(2.0..f64::INFINITY).contains(&r) {
        return Err(QhdError::Validation(format!(
            "spatial exponent r = {r} outside [2, infinity)"
        )));
    }
    let q_is_inf = q.is_infinite();
    if q_is_inf {
        if r != 2.0 {
            return Err(QhdError::Validation(
                "q = infinity is admissible only with r = 2".into(),
            ));
        }
    } else if (1.0 / q + 1.0 / r - 0.5).abs() > 1e-9 || q < 2.0 {
        return Err(QhdError::Validation(format!(
            "({q}, {r}) is not an admissible pair: 1/q + 1/r must equal 1/2"
        )));
    }
    let spatial: Vec<f64> = snapshots
        .iter()
        .map(|psi| {
            let (gx, gy) = psi.gradient();
            let da = psi.grid.cell_area();
            let sum: f64 = gx
                .values
                .iter()
                .zip(&gy.values)
                .map(|(a, b)| (a.norm_sqr() + b.norm_sqr()).sqrt().powf(r))
                .sum();
            (sum * da).powf(1.0 / r)
        })
        .collect();
    if q_is_inf {
        return Ok(spatial.iter().fold(0.0f64, |m, &v| m.max(v)));
    }
    if snapshots.len() < 2 {
        return Err(QhdError::Validation(
            "finite-q mixed norm needs at least two snapshots".into(),
        ));
    }
    let mut acc = 0.0;
    for (i, s) in spatial.iter().enumerate() {
        let w = if i == 0 || i == spatial.len() - 1 { 0.5 } else { 1.0 };
        acc += w * s.powf(q);
    }
    Ok((acc * dt_snap).powf(1.0 / q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::make_grid;
    use crate::propagator::StepParams;
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;

    const TAU2: f64 = 2.0 * PI;

    fn default_params() -> StepParams {
        StepParams {
            dt: 1e-3,
            p: 3.0,
            hbar: 1.0,
            poisson_mode: PoissonMode::PeriodicZeroMean,
            nonlinearity_on: true,
            potential_on: true,
            doping: None,
        }
    }

    #[test]
    fn zero_state_gives_zero_record() {
        let g = make_grid(16, 16, TAU2, TAU2).unwrap();
        let psi = WaveField::zeros(&g, 1.0);
        let rec = record(&psi, &default_params(), 0.0).unwrap();
        assert_eq!(rec.mass, 0.0);
        assert_eq!(rec.energy_wave, 0.0);
        assert_eq!(rec.energy_hydro, 0.0);
        assert_eq!(rec.px, 0.0);
        assert_eq!(rec.entropy, 0.0);
    }

    #[test]
    fn plane_wave_energy_matches_closed_form() {
        let l = TAU2;
        let g = make_grid(64, 64, l, l).unwrap();
        let rho0: f64 = 1.7;
        let k = 3.0 * (2.0 * PI / l);
        let hbar = 0.8;
        let p = 3.0;
        let psi = WaveField::from_fn(&g, hbar, |x, _| Complex64::from_polar(rho0.sqrt(), k * x));
        let params = StepParams {
            hbar,
            ..default_params()
        };
        let rec = record(&psi, &params, 0.0).unwrap();
        let area = l * l;
        let expected = area * (0.5 * rho0 * hbar * hbar * k * k
            + 2.0 / (p + 1.0) * rho0.powf((p + 1.0) / 2.0));
        assert!((rec.energy_hydro - expected).abs() <= 1e-9 * expected);
        // zero-mean Poisson of a uniform density has no field energy
        assert!(rec.e_field.abs() <= 1e-12 * expected);
        assert!((rec.energy_wave - rec.energy_hydro).abs() <= 1e-8 * expected);
    }

    #[test]
    fn gaussian_cubic_energy_forms_agree() {
        let l = 12.0;
        let g = make_grid(128, 128, l, l).unwrap();
        let psi = WaveField::from_fn(&g, 1.0, |x, y| {
            Complex64::new(
                (-((x - 6.0).powi(2) + (y - 6.0).powi(2)) / 2.0).exp(),
                0.0,
            )
        });
        let rec = record(&psi, &default_params(), 0.0).unwrap();
        assert!(
            (rec.energy_wave - rec.energy_hydro).abs() <= 1e-8 * rec.energy_wave.abs(),
            "wave {} vs hydro {}",
            rec.energy_wave,
            rec.energy_hydro
        );
        assert!(rec.e_kinetic_amp >= 0.0 && rec.e_kinetic_cur >= 0.0 && rec.e_internal >= 0.0);
    }

    #[test]
    fn momentum_of_real_state_vanishes() {
        let g = make_grid(64, 64, 12.0, 12.0).unwrap();
        let psi = WaveField::from_fn(&g, 1.0, |x, y| {
            Complex64::new((x * 0.7).sin() + (y * 0.4).cos(), 0.0)
        });
        let rec = record(&psi, &default_params(), 0.0).unwrap();
        let scale = rec.mass.max(1.0);
        assert!(rec.px.abs() <= 1e-13 * scale && rec.py.abs() <= 1e-13 * scale);
    }

    #[test]
    fn entropy_of_uniform_density() {
        let g = make_grid(32, 32, 3.0, 5.0).unwrap();
        let c: f64 = 2.5;
        let psi = WaveField::from_fn(&g, 1.0, |_, _| Complex64::new(c.sqrt(), 0.0));
        let rec = record(&psi, &default_params(), 0.0).unwrap();
        let expected = 15.0 * c * c.ln();
        assert!((rec.entropy - expected).abs() <= 1e-12 * expected.abs());
    }

    #[test]
    fn pressure_identity_examples() {
        let g = make_grid(8, 8, 1.0, 1.0).unwrap();
        let one = RealField::from_fn(&g, |_, _| 1.0);
        // P = 1/2, rho f' - f = 1 - 1/2
        assert!(pressure_identity_residual(&one, 3.0) <= 1e-15);
        let zero = RealField::zeros(&g);
        assert_eq!(pressure_identity_residual(&zero, 3.0), 0.0);

        let ramp = RealField::from_fn(&g, |x, y| 10.0 * (x * 7.3 + y * 3.1).sin().abs());
        for p in [2.0, 3.0, 5.0] {
            assert!(
                pressure_identity_residual(&ramp, p) <= 1e-12,
                "pressure identity failed at p = {p}"
            );
        }
    }

    #[test]
    fn bohm_forms_vanish_for_constant_density() {
        let g = make_grid(32, 32, TAU2, TAU2).unwrap();
        let psi = WaveField::from_fn(&g, 1.0, |_, _| Complex64::new(1.3, 0.0));
        let (ac, bc) = bohm_residuals(&psi).unwrap();
        assert!(ac <= 1e-12 && bc <= 1e-12);
    }

    #[test]
    fn bohm_forms_agree_on_cosine_density() {
        let g = make_grid(64, 64, TAU2, TAU2).unwrap();
        let psi = WaveField::from_fn(&g, 1.0, |x, _| {
            Complex64::new((1.0 + 0.1 * x.cos()).sqrt(), 0.0)
        });
        let (ac, bc) = bohm_residuals(&psi).unwrap();
        assert!(ac <= 1e-8 && bc <= 1e-8, "residuals {ac:.2e}, {bc:.2e}");
    }

    #[test]
    fn bohm_forms_agree_on_floored_gaussian() {
        let l = 12.0;
        let g = make_grid(128, 128, l, l).unwrap();
        let psi = WaveField::from_fn(&g, 1.0, |x, y| {
            let r2 = (x - 6.0).powi(2) + (y - 6.0).powi(2);
            Complex64::new((0.1 + (-r2).exp()).sqrt(), 0.0)
        });
        let (ac, bc) = bohm_residuals(&psi).unwrap();
        assert!(ac <= 1e-6 && bc <= 1e-6, "residuals {ac:.2e}, {bc:.2e}");
    }

    #[test]
    fn bohm_refuses_mostly_vacuum_states() {
        let l = 40.0;
        let g = make_grid(64, 64, l, l).unwrap();
        let psi = WaveField::from_fn(&g, 1.0, |x, y| {
            let r2 = (x - 20.0).powi(2) + (y - 20.0).powi(2);
            Complex64::new((-8.0 * r2).exp(), 0.0)
        });
        assert!(matches!(bohm_residuals(&psi), Err(QhdError::Refusal(_))));
    }

    #[test]
    fn log_sobolev_closed_form_values() {
        // mass 1: rhs = -(1 + log pi)/2
        let l = 16.0;
        let g = make_grid(64, 64, l, l).unwrap();
        let f1 = RealField::from_fn(&g, |x, y| {
            (-((x - 8.0).powi(2) + (y - 8.0).powi(2))).exp() / PI
        });
        let chk = log_sobolev_check(&f1).unwrap();
        assert_abs_diff_eq!(chk.rhs, -(1.0 + PI.ln()) / 2.0, epsilon = 1e-6);
        assert!(chk.holds, "lhs {} rhs {}", chk.lhs, chk.rhs);

        let f2 = RealField {
            grid: f1.grid.clone(),
            values: f1.values.iter().map(|v| 2.0 * v).collect(),
        };
        let chk2 = log_sobolev_check(&f2).unwrap();
        let expected = -2.0 * (1.0 + PI.ln() - 2.0f64.ln());
        assert_abs_diff_eq!(chk2.rhs, expected, epsilon = 1e-5);
        assert!(chk2.holds);
    }

    #[test]
    fn log_sobolev_rejects_negative_density() {
        let g = make_grid(16, 16, 4.0, 4.0).unwrap();
        let f = RealField::from_fn(&g, |_, _| -1.0);
        assert!(log_sobolev_check(&f).is_err());
    }

    #[test]
    fn mixed_norm_validation_and_endpoints() {
        let g = make_grid(32, 32, TAU2, TAU2).unwrap();
        let psi = WaveField::from_fn(&g, 1.0, |x, y| Complex64::new(x.sin(), y.cos()));
        let snaps = vec![psi.clone(), psi.clone(), psi.clone()];

        // inadmissible pairs
        assert!(mixed_norm(&snaps, 0.1, 3.0, 3.0).is_err());
        assert!(mixed_norm(&snaps, 0.1, 4.0, 8.0).is_err());
        assert!(mixed_norm(&snaps, 0.1, f64::INFINITY, 4.0).is_err());

        // (infinity, 2): sup over snapshots of the L2 norm of the gradient
        let sup = mixed_norm(&snaps, 0.1, f64::INFINITY, 2.0).unwrap();
        let (gx, gy) = psi.gradient();
        let da = g.cell_area();
        let l2: f64 = ((gx.values.iter().map(|v| v.norm_sqr()).sum::<f64>()
            + gy.values.iter().map(|v| v.norm_sqr()).sum::<f64>())
            * da)
            .sqrt();
        assert_abs_diff_eq!(sup, l2, epsilon = 1e-12);

        // constant in time: T^{1/q} times the spatial norm, T = 0.2
        let v44 = mixed_norm(&snaps, 0.1, 4.0, 4.0).unwrap();
        let sum: f64 = gx
            .values
            .iter()
            .zip(&gy.values)
            .map(|(a, b)| (a.norm_sqr() + b.norm_sqr()).powi(2))
            .sum::<f64>()
            * da;
        let spatial = sum.powf(0.25);
        assert_abs_diff_eq!(v44, 0.2f64.powf(0.25) * spatial, epsilon = 1e-10);
    }

    #[test]
    fn mixed_norm_of_free_gaussian_is_cadence_stable() {
        use crate::propagator::{kinetic_step};
        let g = make_grid(64, 64, 16.0, 16.0).unwrap();
        let psi0 = WaveField::from_fn(&g, 1.0, |x, y| {
            Complex64::new((-((x - 8.0).powi(2) + (y - 8.0).powi(2)) / 2.0).exp(), 0.0)
        });
        let snapshots = |h: f64| {
            let n = (1.0 / h).round() as usize;
            let mut out = vec![psi0.clone()];
            let mut psi = psi0.clone();
            for _ in 0..n {
                psi = kinetic_step(&psi, h);
                out.push(psi.clone());
            }
            out
        };
        let coarse = mixed_norm(&snapshots(0.1), 0.1, 4.0, 4.0).unwrap();
        let fine = mixed_norm(&snapshots(0.05), 0.05, 4.0, 4.0).unwrap();
        assert!(coarse.is_finite() && coarse > 0.0);
        assert!(
            (coarse - fine).abs() <= 0.01 * fine,
            "mixed norm cadence drift: {coarse} vs {fine}"
        );
    }
}
