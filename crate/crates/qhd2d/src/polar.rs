//! Polar factorization of a wave function and the hydrodynamic moments
//! derived from it, plus the phase-contraction collision update used by the
//! fractional-step scheme.
//!
//! The factor `phi` is `psi/|psi|` where `|psi|` exceeds the vacuum
//! threshold and exactly zero elsewhere, so `sqrt(rho) * phi = psi` holds
//! almost everywhere in the density measure. The moments
//!
//!   grad_sqrt_rho = Re(conj(phi) grad psi),
//!   Lambda        = hbar Im(conj(phi) grad psi),
//!   J             = sqrt(rho) * Lambda
//!
//! stay well defined in vacuum regions where a velocity field would not.

use crate::error::{QhdError, Result};
use crate::fields::{RealField, VectorField, WaveField};
use num_complex::Complex64;

/// Default vacuum threshold relative to `max |psi|`.
pub const DEFAULT_VACUUM_REL: f64 = 1e-10;

/// Absolute vacuum threshold for a state, using the default relative cut.
pub fn default_vacuum_eps(psi: &WaveField) -> f64 {
    DEFAULT_VACUUM_REL * psi.max_abs()
}

/// Unit-modulus-or-zero factor of a wave function.
#[derive(Clone, Debug)]
pub struct PolarFactor {
    pub grid: std::sync::Arc<crate::fields::Grid>,
    pub values: Vec<Complex64>,
}

/// `phi = psi/|psi|` where `|psi| > vacuum_eps`, else 0.
pub fn polar_factor(psi: &WaveField, vacuum_eps: f64) -> PolarFactor {
    let values = psi
        .values
        .iter()
        .map(|&v| {
            let a = v.norm();
            if a > vacuum_eps && a > 0.0 {
                v / a
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    PolarFactor {
        grid: psi.grid.clone(),
        values,
    }
}

/// Hydrodynamic bundle extracted from one wave function.
#[derive(Clone, Debug)]
pub struct HydroMoments {
    pub sqrt_rho: RealField,
    pub grad_sqrt_rho: VectorField,
    pub lambda: VectorField,
    pub j: VectorField,
    pub rho: RealField,
    /// Points at or below the vacuum threshold; moments are zeroed there.
    pub vacuum: Vec<bool>,
    pub hbar: f64,
}

/// Extract the moments of `psi` with the given vacuum threshold.
pub fn moments(psi: &WaveField, vacuum_eps: f64) -> HydroMoments {
    let grid = psi.grid.clone();
    let (gx, gy) = psi.gradient();
    let n = grid.len();
    let mut sqrt_rho = vec![0.0; n];
    let mut rho = vec![0.0; n];
    let mut gsx = vec![0.0; n];
    let mut gsy = vec![0.0; n];
    let mut lx = vec![0.0; n];
    let mut ly = vec![0.0; n];
    let mut jx = vec![0.0; n];
    let mut jy = vec![0.0; n];
    let mut vacuum = vec![false; n];
    let hbar = psi.hbar;
    for i in 0..n {
        let v = psi.values[i];
        let a = v.norm();
        sqrt_rho[i] = a;
        rho[i] = a * a;
        if a > vacuum_eps && a > 0.0 {
            let phi_conj = v.conj() / a;
            let zx = phi_conj * gx.values[i];
            let zy = phi_conj * gy.values[i];
            gsx[i] = zx.re;
            gsy[i] = zy.re;
            lx[i] = hbar * zx.im;
            ly[i] = hbar * zy.im;
            jx[i] = a * lx[i];
            jy[i] = a * ly[i];
        } else {
            vacuum[i] = true;
        }
    }
    HydroMoments {
        sqrt_rho: RealField {
            grid: grid.clone(),
            values: sqrt_rho,
        },
        grad_sqrt_rho: VectorField {
            grid: grid.clone(),
            x: gsx,
            y: gsy,
        },
        lambda: VectorField {
            grid: grid.clone(),
            x: lx,
            y: ly,
        },
        j: VectorField {
            grid: grid.clone(),
            x: jx,
            y: jy,
        },
        rho: RealField { grid, values: rho },
        vacuum,
        hbar,
    }
}

/// Max-norm residual of the pointwise identity
/// `hbar^2 Re(d_j conj(psi) d_k psi) = hbar^2 d_j sqrt(rho) d_k sqrt(rho)
///  + Lambda_j Lambda_k`, normalized by `hbar^2 ||grad psi||_inf^2`, over
/// index pairs and non-vacuum points.
pub fn null_form_residual(psi: &WaveField, vacuum_eps: f64) -> f64 {
    let (gx, gy) = psi.gradient();
    let m = moments(psi, vacuum_eps);
    let h2 = psi.hbar * psi.hbar;
    let mut grad_inf: f64 = 0.0;
    for i in 0..psi.grid.len() {
        grad_inf = grad_inf.max(gx.values[i].norm()).max(gy.values[i].norm());
    }
    let floor = f64::EPSILON;
    let scale = h2 * grad_inf * grad_inf + floor;
    let g = [&gx.values, &gy.values];
    let gs = [&m.grad_sqrt_rho.x, &m.grad_sqrt_rho.y];
    let lam = [&m.lambda.x, &m.lambda.y];
    let mut worst: f64 = 0.0;
    for i in 0..psi.grid.len() {
        if m.vacuum[i] {
            continue;
        }
        for j in 0..2 {
            for k in 0..2 {
                let lhs = h2 * (g[j][i].conj() * g[k][i]).re;
                let rhs = h2 * gs[j][i] * gs[k][i] + lam[j][i] * lam[k][i];
                worst = worst.max((lhs - rhs).abs());
            }
        }
    }
    worst / scale
}

/// Sup-norm residual of `curl J = 2 (grad sqrt(rho)) x Lambda`, with the
/// curl taken spectrally and vacuum points excluded, relative to the
/// natural curl magnitude `2 hbar sup|grad psi|^2` (reconstructed from the
/// moments through the trace of the null form).
pub fn irrotationality_residual(m: &HydroMoments) -> f64 {
    let curl_j = m.j.curl();
    let mut num: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..m.rho.grid.len() {
        let grad_psi_sq = m.grad_sqrt_rho.x[i].powi(2)
            + m.grad_sqrt_rho.y[i].powi(2)
            + (m.lambda.x[i].powi(2) + m.lambda.y[i].powi(2)) / (m.hbar * m.hbar);
        scale = scale.max(2.0 * m.hbar * grad_psi_sq);
        if m.vacuum[i] {
            continue;
        }
        let rhs = 2.0 * (m.grad_sqrt_rho.x[i] * m.lambda.y[i] - m.grad_sqrt_rho.y[i] * m.lambda.x[i]);
        num = num.max((curl_j.values[i] - rhs).abs());
    }
    num / (scale + f64::EPSILON)
}

/// Measured bookkeeping of one collision update.
#[derive(Clone, Debug)]
pub struct UpdateReport {
    pub mass_pre: f64,
    pub mass_post: f64,
    pub j_l2_pre: f64,
    pub j_l2_post: f64,
    /// `||J_post||_2 / ||J_pre||_2`; NaN when the pre-update current vanishes.
    pub j_scaling_ratio: f64,
    pub lambda_l2_pre: f64,
    /// `|| grad psi_post - grad psi_pre + i (tau/hbar) phi_post Lambda_pre ||_2`.
    pub grad_residual_l2: f64,
}

/// Phase-contraction update `psi -> |psi| exp(i (1-tau) theta)` with `theta`
/// the principal argument in `(-pi, pi]`; points at or below the vacuum
/// threshold map to zero. `tau = 0` returns the input unchanged.
pub fn collision_update(
    psi: &WaveField,
    tau: f64,
    vacuum_eps: f64,
) -> Result<(WaveField, UpdateReport)> {
    if !(0.0..1.0).contains(&tau) {
        return Err(QhdError::Validation(format!(
            "collision update needs 0 <= tau < 1, got {tau}"
        )));
    }
    let pre = moments(psi, vacuum_eps);
    let mass_pre = psi.mass();
    let j_l2_pre = pre.j.norm_l2();
    let lambda_l2_pre = pre.lambda.norm_l2();

    let updated = if tau == 0.0 {
        psi.clone()
    } else {
        let values = psi
            .values
            .iter()
            .map(|&v| {
                let a = v.norm();
                if a > vacuum_eps && a > 0.0 {
                    let theta = v.im.atan2(v.re);
                    Complex64::from_polar(a, (1.0 - tau) * theta)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        WaveField {
            grid: psi.grid.clone(),
            values,
            hbar: psi.hbar,
        }
    };

    let mass_post = updated.mass();
    let post = moments(&updated, vacuum_eps);
    let j_l2_post = post.j.norm_l2();

    // residual of grad psi_post = grad psi_pre - i (tau/hbar) phi_post Lambda_pre
    let phi_post = polar_factor(&updated, vacuum_eps);
    let (gx0, gy0) = psi.gradient();
    let (gx1, gy1) = updated.gradient();
    let mut sum = 0.0;
    for i in 0..psi.grid.len() {
        let cx = Complex64::new(pre.lambda.x[i], 0.0);
        let cy = Complex64::new(pre.lambda.y[i], 0.0);
        let corr = Complex64::new(0.0, tau / psi.hbar) * phi_post.values[i];
        let rx = gx1.values[i] - gx0.values[i] + corr * cx;
        let ry = gy1.values[i] - gy0.values[i] + corr * cy;
        sum += rx.norm_sqr() + ry.norm_sqr();
    }
    let grad_residual_l2 = (sum * psi.grid.cell_area()).sqrt();

    Ok((
        updated,
        UpdateReport {
            mass_pre,
            mass_post,
            j_l2_pre,
            j_l2_post,
            j_scaling_ratio: if j_l2_pre > 0.0 {
                j_l2_post / j_l2_pre
            } else {
                f64::NAN
            },
            lambda_l2_pre,
            grad_residual_l2,
        },
    ))
}

/// Moment response to an H1-small perturbation:
/// `||Lambda(psi + s d) - Lambda(psi)||_2 + ||grad sqrt(rho)(psi + s d) -
///  grad sqrt(rho)(psi)||_2`.
pub fn stability_probe(psi: &WaveField, perturbation: &WaveField, scale: f64) -> Result<f64> {
    if !psi.grid.same_as(&perturbation.grid) {
        return Err(QhdError::Dimension(
            "perturbation lives on a different grid".into(),
        ));
    }
    if scale == 0.0 {
        return Ok(0.0);
    }
    let perturbed = WaveField {
        grid: psi.grid.clone(),
        values: psi
            .values
            .iter()
            .zip(&perturbation.values)
            .map(|(a, b)| a + scale * b)
            .collect(),
        hbar: psi.hbar,
    };
    let eps = default_vacuum_eps(psi);
    let m0 = moments(psi, eps);
    let m1 = moments(&perturbed, eps);
    let da = psi.grid.cell_area();
    let mut lam = 0.0;
    let mut gsr = 0.0;
    for i in 0..psi.grid.len() {
        lam += (m1.lambda.x[i] - m0.lambda.x[i]).powi(2)
            + (m1.lambda.y[i] - m0.lambda.y[i]).powi(2);
        gsr += (m1.grad_sqrt_rho.x[i] - m0.grad_sqrt_rho.x[i]).powi(2)
            + (m1.grad_sqrt_rho.y[i] - m0.grad_sqrt_rho.y[i]).powi(2);
    }
    Ok((lam * da).sqrt() + (gsr * da).sqrt())
}
