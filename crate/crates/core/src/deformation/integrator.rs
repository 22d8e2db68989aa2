//! Dormand–Prince 5(4) for a single complex unknown.
//!
//! The right-hand side is fallible and the caller may veto steps after
//! error acceptance, which the continuation uses to bound how far the
//! branch trackers move per step.

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorSettings {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        IntegratorSettings {
            rtol: 1e-12,
            atol: 1e-14,
            h_max: 1.0 / 64.0,
            h_min: 1e-14,
            max_steps: 2_000_000,
        }
    }
}

impl IntegratorSettings {
    /// Defaults per field. The finite-B field is only Lipschitz at the moving
    /// pins and they are unstable trajectories of it, so it integrates near
    /// machine precision.
    pub fn for_field(variant: super::FieldVariant) -> Self {
        match variant {
            super::FieldVariant::Cutoff => Self::default(),
            super::FieldVariant::FiniteB => IntegratorSettings {
                rtol: 1e-15,
                atol: 1e-17,
                ..Self::default()
            },
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub vetoed: usize,
}

impl std::ops::AddAssign for StepStats {
    fn add_assign(&mut self, o: Self) {
        self.accepted += o.accepted;
        self.rejected += o.rejected;
        self.vetoed += o.vetoed;
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Fifth minus fourth order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrate `y′ = f(t, y)` from `t0` to `t1` (either direction).
///
/// `on_step(t_old, y_old, t_new, y_new)` sees every step that passed the
/// error test; returning `Ok(false)` rejects it and retries with half the
/// step. `h` is used as the first trial step and updated to the last
/// accepted one so consecutive calls continue smoothly.
pub fn integrate<F, S>(
    f: &F,
    t0: f64,
    t1: f64,
    y0: Complex64,
    settings: &IntegratorSettings,
    h: &mut f64,
    mut on_step: S,
) -> Result<(Complex64, StepStats)>
where
    F: Fn(f64, Complex64) -> Result<Complex64>,
    S: FnMut(f64, Complex64, f64, Complex64) -> Result<bool>,
{
    let mut stats = StepStats::default();
    if t0 == t1 {
        return Ok((y0, stats));
    }
    let dir = (t1 - t0).signum();
    let span = (t1 - t0).abs();
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, y)?;
    let mut hh = if *h > 0.0 { *h } else { 1e-3 };
    hh = hh.min(settings.h_max).min(span);
    let mut last_err = 1e-4_f64;
    while (t1 - t) * dir > 0.0 {
        if stats.accepted + stats.rejected + stats.vetoed > settings.max_steps {
            return Err(Error::Integrator(format!(
                "step budget exhausted at t = {t}"
            )));
        }
        let remaining = (t1 - t).abs();
        let last = hh >= remaining * (1.0 - 1e-12);
        let step = if last { remaining } else { hh };
        let hs = step * dir;
        let k2 = f(t + C2 * hs, y + k1 * (A21 * hs))?;
        let k3 = f(t + C3 * hs, y + (k1 * A31 + k2 * A32) * hs)?;
        let k4 = f(t + C4 * hs, y + (k1 * A41 + k2 * A42 + k3 * A43) * hs)?;
        let k5 = f(t + C5 * hs, y + (k1 * A51 + k2 * A52 + k3 * A53 + k4 * A54) * hs)?;
        let t_new = if last { t1 } else { t + hs };
        let k6 = f(
            t_new,
            y + (k1 * A61 + k2 * A62 + k3 * A63 + k4 * A64 + k5 * A65) * hs,
        )?;
        let y_new = y + (k1 * B1 + k3 * B3 + k4 * B4 + k5 * B5 + k6 * B6) * hs;
        let k7 = f(t_new, y_new)?;
        let err_vec = (k1 * E1 + k3 * E3 + k4 * E4 + k5 * E5 + k6 * E6 + k7 * E7) * hs;
        let sc = settings.atol + settings.rtol * y.norm().max(y_new.norm());
        let err = err_vec.norm() / sc;
        if !err.is_finite() {
            return Err(Error::Integrator(format!("non-finite state near t = {t}")));
        }
        if err <= 1.0 {
            if !on_step(t, y, t_new, y_new)? {
                stats.vetoed += 1;
                hh = 0.5 * step;
                if hh < settings.h_min {
                    return Err(Error::Integrator(format!(
                        "step size underflow at t = {t} (vetoed)"
                    )));
                }
                continue;
            }
            stats.accepted += 1;
            // PI controller (Hairer–Wanner, β = 0.04).
            let fac = 0.9 * err.max(1e-10).powf(-0.17) * last_err.powf(0.04);
            last_err = err.max(1e-4);
            t = t_new;
            y = y_new;
            k1 = k7;
            if !last {
                *h = step;
            }
            hh = (step * fac.clamp(0.2, 5.0)).min(settings.h_max);
        } else {
            stats.rejected += 1;
            hh = step * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            if hh < settings.h_min {
                return Err(Error::Integrator(format!(
                    "step size underflow at t = {t}"
                )));
            }
        }
    }
    Ok((y, stats))
}
