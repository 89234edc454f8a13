//! Far-field Gaussian beam irradiance and the receiver front end.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::scene::Vec3;
use crate::{Error, Result};

/// Photodetector with a non-imaging concentrator behind a field-of-view gate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontEnd {
    pub a_d: f64,
    pub fov: f64,
    pub g_conc: f64,
}

impl FrontEnd {
    pub fn new(a_d: f64, fov: f64, n_conc: f64) -> Result<Self> {
        if !(a_d > 0.0) {
            return Err(Error::geometry(format!("detector area must be positive, got {a_d}")));
        }
        let g_conc = concentrator_gain(n_conc, fov)?;
        Ok(Self { a_d, fov, g_conc })
    }
}

/// Angle between a beam axis and the ray towards a grid point. The cosine is
/// clamped to [-1, 1] so collinear vectors do not produce NaN.
pub fn angular_deviation(beam_dir: Vec3, grid_vec: Vec3) -> Result<f64> {
    let len = grid_vec.norm();
    if !(len > 0.0) {
        return Err(Error::geometry("zero-length grid vector"));
    }
    Ok((beam_dir.dot(grid_vec) / len).clamp(-1.0, 1.0).acos())
}

/// Gaussian irradiance (W/m²) at range `d` and angle `theta_diff` off axis,
/// using the far-field radius `w(d) = d * theta_div`.
pub fn irradiance(p_t: f64, theta_div: f64, d: f64, theta_diff: f64) -> Result<f64> {
    if !(theta_div > 0.0) {
        return Err(Error::geometry("divergence must be positive"));
    }
    if !(d > 0.0) {
        return Err(Error::geometry("zero propagation distance"));
    }
    let w = theta_div * d;
    let ratio = theta_diff / theta_div;
    Ok(2.0 * p_t / (PI * w * w) * (-2.0 * ratio * ratio).exp())
}

/// Ideal non-imaging concentrator gain `n² / sin²(fov)`.
pub fn concentrator_gain(n_conc: f64, fov: f64) -> Result<f64> {
    if !(fov > 0.0 && fov <= FRAC_PI_2) {
        return Err(Error::geometry(format!("fov must lie in (0, pi/2], got {fov}")));
    }
    if !(n_conc >= 1.0) {
        return Err(Error::geometry(format!("concentrator index must be >= 1, got {n_conc}")));
    }
    let s = fov.sin();
    Ok(n_conc * n_conc / (s * s))
}

/// Incidence angle on a horizontal, upward-facing detector.
pub fn incidence_angle(z_source: f64, z_rx: f64, d: f64) -> f64 {
    ((z_source - z_rx) / d).clamp(-1.0, 1.0).acos()
}

/// Collected power (W). Rays with `incidence > fov` are gated to exactly 0;
/// the boundary itself is collected.
pub fn received_power(irr: f64, front: &FrontEnd, incidence: f64) -> f64 {
    if incidence <= front.fov {
        irr * front.a_d * incidence.cos() * front.g_conc
    } else {
        0.0
    }
}
