//! Collisionless evolution of the Schrodinger-Poisson system
//! `i hbar d_t psi = -(hbar^2/2) lap psi + |psi|^{p-1} psi + V psi`
//! by symmetric (Strang) splitting: a half kinetic step, a phase kick with
//! the potential frozen on the mid-step density, and a second half kinetic
//! step. Every substep is unitary, so mass is conserved to rounding.

use crate::diagnostics::{self, DiagnosticsRecord};
use crate::error::{QhdError, Result};
use crate::fields::{RealField, WaveField};
use crate::poisson::{self, PoissonMode};
use num_complex::Complex64;

/// Parameters of one collisionless evolution.
#[derive(Clone, Debug)]
pub struct StepParams {
    pub dt: f64,
    /// Pressure-law exponent; `P(rho) = (p-1)/(p+1) rho^{(p+1)/2}`.
    pub p: f64,
    pub hbar: f64,
    pub poisson_mode: PoissonMode,
    pub nonlinearity_on: bool,
    pub potential_on: bool,
    /// Optional static background charge entering the Poisson source as
    /// `rho - doping`.
    pub doping: Option<RealField>,
}

impl StepParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt != 0.0) {
            return Err(QhdError::Validation(format!("dt = {} is not usable", self.dt)));
        }
        if !(self.p >= 1.0 && self.p <= 5.0) {
            return Err(QhdError::Validation(format!(
                "nonlinearity exponent p = {} outside the supported range [1, 5]",
                self.p
            )));
        }
        if !(self.hbar > 0.0) {
            return Err(QhdError::Validation(format!("hbar = {} must be positive", self.hbar)));
        }
        Ok(())
    }
}

/// Exact free flight: `psi_hat -> exp(-i hbar |k|^2 dt / 2) psi_hat`.
pub fn kinetic_step(psi: &WaveField, dt: f64) -> WaveField {
    let grid = &psi.grid;
    let mut spec = psi.values.clone();
    grid.forward(&mut spec);
    let half = 0.5 * psi.hbar * dt;
    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            let k2 = grid.kx[ix] * grid.kx[ix] + grid.ky[iy] * grid.ky[iy];
            spec[iy * grid.nx + ix] *= Complex64::from_polar(1.0, -half * k2);
        }
    }
    grid.inverse(&mut spec);
    WaveField {
        grid: grid.clone(),
        values: spec,
        hbar: psi.hbar,
    }
}

/// Pointwise phase kick `psi -> exp(-i dt (|psi|^{p-1} + V)/hbar) psi` with
/// the potential frozen during the substep. Exact for this substep because
/// `|psi|` is invariant under phase multiplication.
pub fn potential_step(
    psi: &WaveField,
    v: Option<&RealField>,
    params: &StepParams,
    dt: f64,
) -> WaveField {
    let scale = dt / psi.hbar;
    let p = params.p;
    let values = psi
        .values
        .iter()
        .enumerate()
        .map(|(i, &val)| {
            let mut chi = 0.0;
            if params.nonlinearity_on {
                let rho = val.norm_sqr();
                chi += if p == 3.0 {
                    rho
                } else if p == 1.0 {
                    1.0
                } else {
                    rho.powf((p - 1.0) / 2.0)
                };
            }
            if let Some(v) = v {
                chi += v.values[i];
            }
            val * Complex64::from_polar(1.0, -scale * chi)
        })
        .collect();
    WaveField {
        grid: psi.grid.clone(),
        values,
        hbar: psi.hbar,
    }
}

/// One full step: `kinetic(dt/2) . potential(dt) . kinetic(dt/2)`, the
/// Poisson potential solved once from the mid-step density.
pub fn strang_step(psi: &WaveField, params: &StepParams) -> Result<WaveField> {
    let dt = params.dt;
    let mid = kinetic_step(psi, 0.5 * dt);
    let kicked = if params.potential_on {
        let sol = poisson::solve(&mid.density(), params.doping.as_ref(), params.poisson_mode)?;
        potential_step(&mid, Some(&sol.v), params, dt)
    } else if params.nonlinearity_on {
        potential_step(&mid, None, params, dt)
    } else {
        mid
    };
    Ok(kinetic_step(&kicked, 0.5 * dt))
}

/// Result of a propagation: final state plus the diagnostics series.
#[derive(Debug)]
pub struct Propagation {
    pub psi: WaveField,
    pub records: Vec<DiagnosticsRecord>,
}

/// Evolve for `t_span = n * dt`, sampling diagnostics every `cadence` steps
/// (0 disables sampling). Aborts with a blow-up error if the state leaves
/// the finite range or its amplitude grows by a factor of 1e6.
pub fn propagate(
    psi0: &WaveField,
    t_span: f64,
    params: &StepParams,
    cadence: usize,
) -> Result<Propagation> {
    let mut records = Vec::new();
    let psi = propagate_inner(
        psi0, t_span, params, cadence, 0.0, true, &mut records, &mut |_, _| {},
    )?;
    Ok(Propagation { psi, records })
}

/// `propagate` with a per-step observer `(t, psi)`, called after every step.
pub fn propagate_with(
    psi0: &WaveField,
    t_span: f64,
    params: &StepParams,
    cadence: usize,
    observer: &mut dyn FnMut(f64, &WaveField),
) -> Result<Propagation> {
    let mut records = Vec::new();
    let psi = propagate_inner(psi0, t_span, params, cadence, 0.0, true, &mut records, observer)?;
    Ok(Propagation { psi, records })
}

pub(crate) fn steps_for(t_span: f64, dt: f64) -> Result<usize> {
    let n = t_span / dt;
    let rounded = n.round();
    if (n - rounded).abs() > 1e-9 * (1.0 + n.abs()) || rounded < 0.0 {
        return Err(QhdError::Validation(format!(
            "t_span = {t_span} is not an integer multiple of dt = {dt}"
        )));
    }
    Ok(rounded as usize)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn propagate_inner(
    psi0: &WaveField,
    t_span: f64,
    params: &StepParams,
    cadence: usize,
    t0: f64,
    record_final: bool,
    records: &mut Vec<DiagnosticsRecord>,
    observer: &mut dyn FnMut(f64, &WaveField),
) -> Result<WaveField> {
    params.validate()?;
    if (psi0.hbar - params.hbar).abs() > 1e-12 * params.hbar {
        return Err(QhdError::Validation(format!(
            "state carries hbar = {} but params say {}",
            psi0.hbar, params.hbar
        )));
    }
    if !psi0.is_finite() {
        return Err(QhdError::Validation("initial state is not finite".into()));
    }
    let n_steps = steps_for(t_span, params.dt)?;
    let guard = 1e6 * psi0.max_abs();
    let mut psi = psi0.clone();
    if cadence > 0 && t0 == 0.0 {
        records.push(diagnostics::record(&psi, params, t0)?);
    }
    for step in 1..=n_steps {
        let t_prev = t0 + (step - 1) as f64 * params.dt;
        let t = t0 + step as f64 * params.dt;
        psi = strang_step(&psi, params)?;
        if !psi.is_finite() || psi.max_abs() > guard {
            return Err(QhdError::BlowUp {
                t_last_good: t_prev,
                detail: format!("amplitude left the guard range at step {step}"),
            });
        }
        observer(t, &psi);
        if cadence > 0 && (step % cadence == 0 || (record_final && step == n_steps)) {
            records.push(diagnostics::record(&psi, params, t)?);
        }
    }
    Ok(psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::make_grid;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    const TAU2: f64 = 2.0 * PI;

    fn linear_params(dt: f64) -> StepParams {
        StepParams {
            dt,
            p: 3.0,
            hbar: 1.0,
            poisson_mode: PoissonMode::PeriodicZeroMean,
            nonlinearity_on: false,
            potential_on: false,
            doping: None,
        }
    }

    fn full_params(dt: f64) -> StepParams {
        StepParams {
            nonlinearity_on: true,
            potential_on: true,
            ..linear_params(dt)
        }
    }

    #[test]
    fn kinetic_step_is_exact_on_plane_waves() {
        let g = make_grid(32, 32, TAU2, TAU2).unwrap();
        let psi = WaveField::from_fn(&g, 1.0, |x, y| Complex64::from_polar(1.0, 2.0 * x + y));
        let dt = 0.37;
        let out = kinetic_step(&psi, dt);
        let phase = Complex64::from_polar(1.0, -(4.0 + 1.0) * dt / 2.0);
        for (a, b) in out.values.iter().zip(&psi.values) {
            assert!((a - phase * b).norm() < 1e-12);
        }
        assert!((out.mass() - psi.mass()).abs() <= 1e-13 * psi.mass());
    }

    #[test]
    fn free_gaussian_matches_closed_form() {
        let n = 128;
        let l = 16.0;
        let g = make_grid(n, n, l, l).unwrap();
        let w2 = 1.0; // width^2
        let psi0 = WaveField::from_fn(&g, 1.0, |x, y| {
            Complex64::new(
                (-((x - 8.0).powi(2) + (y - 8.0).powi(2)) / (2.0 * w2)).exp(),
                0.0,
            )
        });
        let t = 0.5;
        let params = linear_params(1e-3);
        let out = propagate(&psi0, t, &params, 0).unwrap().psi;
        let denom = Complex64::new(w2, t);
        let pref = Complex64::new(w2, 0.0) / denom;
        let mut err = 0.0;
        for iy in 0..n {
            for ix in 0..n {
                let (cx, cy) = (g.x(ix) - 8.0, g.y(iy) - 8.0);
                let exact = pref * (Complex64::new(-(cx * cx + cy * cy), 0.0) / (2.0 * denom)).exp();
                err += (out.values[iy * n + ix] - exact).norm_sqr();
            }
        }
        let err = (err * g.cell_area()).sqrt();
        assert!(err <= 1e-7, "free-Gaussian L2 error {err:.3e}");
    }

    #[test]
    fn potential_step_constant_v_is_a_global_phase() {
        let g = make_grid(16, 16, TAU2, TAU2).unwrap();
        let psi = WaveField::from_fn(&g, 1.0, |x, y| Complex64::new(x.sin(), y.cos()));
        let c = 0.8;
        let v = RealField::from_fn(&g, |_, _| c);
        let dt = 0.21;
        let out = potential_step(&psi, Some(&v), &linear_params(dt), dt);
        let phase = Complex64::from_polar(1.0, -c * dt);
        for (a, b) in out.values.iter().zip(&psi.values) {
            assert!((a - phase * b).norm() <= 1e-14);
            assert!((a.norm() - b.norm()).abs() <= 1e-15 * (1.0 + b.norm()));
        }
    }

    #[test]
    fn cubic_plane_wave_phase_rotation_is_exact() {
        let g = make_grid(32, 32, TAU2, TAU2).unwrap();
        let rho0: f64 = 1.9;
        let psi = WaveField::from_fn(&g, 1.0, |x, _| Complex64::from_polar(rho0.sqrt(), x));
        let dt = 0.05;
        let mut params = full_params(dt);
        params.potential_on = false;
        let out = potential_step(&psi, None, &params, dt);
        let phase = Complex64::from_polar(1.0, -rho0 * dt);
        for (a, b) in out.values.iter().zip(&psi.values) {
            assert!((a - phase * b).norm() <= 1e-10);
        }
    }

    #[test]
    fn strang_step_is_near_identity_for_small_dt() {
        let g = make_grid(32, 32, TAU2, TAU2).unwrap();
        let psi = WaveField::from_fn(&g, 1.0, |x, y| {
            Complex64::new((-((x - PI).powi(2) + (y - PI).powi(2))).exp(), 0.0)
        });
        for dt in [1e-3, 5e-4] {
            let out = strang_step(&psi, &full_params(dt)).unwrap();
            let mut diff = 0.0;
            for (a, b) in out.values.iter().zip(&psi.values) {
                diff += (a - b).norm_sqr();
            }
            let diff = (diff * g.cell_area()).sqrt();
            assert!(diff < 10.0 * dt, "one-step distance {diff} at dt={dt}");
        }
    }

    #[test]
    fn strang_self_convergence_is_second_order() {
        let g = make_grid(64, 64, TAU2, TAU2).unwrap();
        let psi0 = WaveField::from_fn(&g, 1.0, |x, y| {
            Complex64::new((-((x - PI).powi(2) + (y - PI).powi(2))).exp(), 0.0)
        });
        let t = 0.2;
        let run = |dt: f64| propagate(&psi0, t, &full_params(dt), 0).unwrap().psi;
        let a = run(2e-3);
        let b = run(1e-3);
        let c = run(5e-4);
        let d1: f64 = a
            .values
            .iter()
            .zip(&b.values)
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let d2: f64 = b
            .values
            .iter()
            .zip(&c.values)
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let ratio = d1 / d2;
        assert!(
            (3.2..4.8).contains(&ratio),
            "self-convergence ratio {ratio} not second order"
        );
    }

    #[test]
    fn mass_is_conserved_over_many_steps() {
        let g = make_grid(64, 64, TAU2, TAU2).unwrap();
        let psi0 = WaveField::from_fn(&g, 1.0, |x, y| {
            Complex64::new((-((x - PI).powi(2) + (y - PI).powi(2))).exp(), 0.1 * x.sin())
        });
        let params = full_params(1e-3);
        let out = propagate(&psi0, 0.2, &params, 0).unwrap().psi;
        let drift = (out.mass() - psi0.mass()).abs() / psi0.mass();
        assert!(drift <= 1e-12, "mass drift {drift:.3e}");
    }

    #[test]
    fn total_momentum_is_conserved_in_periodic_mode() {
        let l = 4.0 * PI;
        let g = make_grid(64, 64, l, l).unwrap();
        // branch-safe current carrier with nonzero total momentum
        let psi0 = WaveField::from_fn(&g, 1.0, |x, y| {
            let r2 = (x - l / 2.0).powi(2) + (y - l / 2.0).powi(2);
            Complex64::from_polar((-r2).exp(), 0.5 * x.sin())
        });
        let run = propagate(&psi0, 0.2, &full_params(1e-3), 50).unwrap();
        let p0 = (run.records[0].px.powi(2) + run.records[0].py.powi(2)).sqrt();
        for r in &run.records {
            let p = (r.px.powi(2) + r.py.powi(2)).sqrt();
            assert!(
                (p - p0).abs() <= 1e-8 * p0,
                "momentum drift {:.3e} at t={}",
                (p - p0).abs() / p0,
                r.t
            );
        }
    }

    #[test]
    fn zero_span_returns_initial_state() {
        let g = make_grid(16, 16, TAU2, TAU2).unwrap();
        let psi0 = WaveField::from_fn(&g, 1.0, |x, _| Complex64::new(x.cos(), 0.0));
        let out = propagate(&psi0, 0.0, &full_params(1e-3), 1).unwrap();
        assert_eq!(out.psi.values, psi0.values);
        assert_eq!(out.records.len(), 1);
    }

    #[test]
    fn linear_mode_collapses_to_composed_kinetic_steps() {
        let g = make_grid(32, 32, TAU2, TAU2).unwrap();
        let psi0 = WaveField::from_fn(&g, 1.0, |x, y| {
            Complex64::new((-((x - PI).powi(2) + (y - PI).powi(2))).exp(), 0.2 * y.cos())
        });
        let dt = 1e-2;
        let n = 20;
        let out = propagate(&psi0, dt * n as f64, &linear_params(dt), 0)
            .unwrap()
            .psi;
        let mut reference = psi0.clone();
        for _ in 0..n {
            reference = kinetic_step(&reference, dt);
        }
        let mut diff = 0.0f64;
        for (a, b) in out.values.iter().zip(&reference.values) {
            diff = diff.max((a - b).norm());
        }
        assert!(diff <= 1e-12, "linear composition mismatch {diff:.3e}");
    }

    #[test]
    fn linear_evolution_is_time_reversible() {
        let g = make_grid(32, 32, TAU2, TAU2).unwrap();
        let psi0 = WaveField::from_fn(&g, 1.0, |x, y| {
            Complex64::new((-((x - PI).powi(2) + (y - PI).powi(2))).exp(), 0.0)
        });
        let fwd = propagate(&psi0, 0.3, &linear_params(1e-3), 0).unwrap().psi;
        let back = propagate(&fwd, -0.3, &linear_params(-1e-3), 0).unwrap().psi;
        let mut diff = 0.0f64;
        for (a, b) in back.values.iter().zip(&psi0.values) {
            diff = diff.max((a - b).norm());
        }
        assert!(diff <= 1e-10, "time-reversal mismatch {diff:.3e}");
    }

    #[test]
    fn non_integer_span_is_rejected() {
        let g = make_grid(16, 16, TAU2, TAU2).unwrap();
        let psi0 = WaveField::zeros(&g, 1.0);
        assert!(matches!(
            propagate(&psi0, 0.0015, &full_params(1e-3), 0),
            Err(QhdError::Validation(_))
        ));
    }

    #[test]
    fn overflow_is_reported_as_blowup() {
        let g = make_grid(16, 16, TAU2, TAU2).unwrap();
        let psi0 = WaveField::from_fn(&g, 1.0, |_, _| Complex64::new(1e200, 0.0));
        let mut params = full_params(1e-3);
        params.potential_on = false; // density overflows inside the cubic kick
        match propagate(&psi0, 0.01, &params, 0) {
            Err(QhdError::BlowUp { t_last_good, .. }) => {
                assert_abs_diff_eq!(t_last_good, 0.0, epsilon = 1e-12)
            }
            other => panic!("expected blow-up, got {other:?}"),
        }
    }

    #[test]
    fn energy_drift_shrinks_at_second_order() {
        let g = make_grid(64, 64, TAU2, TAU2).unwrap();
        let psi0 = WaveField::from_fn(&g, 1.0, |x, y| {
            Complex64::new((-((x - PI).powi(2) + (y - PI).powi(2)) / 2.0).exp(), 0.0)
        });
        let drift = |dt: f64| {
            let run = propagate(&psi0, 0.2, &full_params(dt), 20).unwrap();
            let e0 = run.records[0].energy_wave;
            run.records
                .iter()
                .map(|r| (r.energy_wave - e0).abs() / e0.abs())
                .fold(0.0f64, f64::max)
        };
        let d1 = drift(1e-3);
        let d2 = drift(5e-4);
        let ratio = d1 / d2;
        assert!(
            (3.0..5.0).contains(&ratio),
            "energy drift ratio {ratio} (d1={d1:.3e}, d2={d2:.3e})"
        );
    }
}
